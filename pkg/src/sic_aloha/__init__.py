"""SIC-assisted slotted ALOHA: closed-form analytics and slot-level simulation."""

__version__ = "0.1.0"
