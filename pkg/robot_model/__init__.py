# Robot model module
