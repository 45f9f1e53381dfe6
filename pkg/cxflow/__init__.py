# placeholder for dynamic versioning
__version__ = "0.1.0"
