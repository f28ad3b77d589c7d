"""Exception types. Every error carries a stable machine-readable ``code``."""

from __future__ import annotations


class ZkflError(Exception):
    def __init__(self, code: str, message: str = "") -> None:
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code


class CryptoError(ZkflError):
    pass


class EncodingError(ZkflError):
    pass


class ShapeError(ZkflError):
    def __init__(self, message: str = "") -> None:
        super().__init__("shape-error", message)


class ProtocolError(ZkflError):
    pass


class LedgerError(ZkflError):
    pass


class ConfigError(ZkflError):
    def __init__(self, message: str = "") -> None:
        super().__init__("config-invalid", message)


class DecodeError(ZkflError, ValueError):
    """Malformed canonical bytes."""

    def __init__(self, message: str = "") -> None:
        super().__init__("malformed", message)
