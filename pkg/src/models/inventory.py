"""Class inventory model: the tied-state class set of one acoustic model."""

from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

from ..core.exceptions import FileAccessError, FormatError, ValidationError

HEADER_KEYS = ("language_id", "size", "silence_phone")


@dataclass(frozen=True)
class ClassInventory:
    """Named class set with its class-to-phone relation."""
    language_id: str
    size: int
    phone_of_class: Tuple[str, ...]
    silence_phone: str

    def __post_init__(self):
        object.__setattr__(self, "phone_of_class", tuple(self.phone_of_class))
        self.validate()

    def validate(self) -> None:
        """Check the inventory invariants."""
        if not self.language_id:
            raise ValidationError("Inventory language_id must be non-empty", code="invalid-inventory")
        if self.size < 2:
            raise ValidationError(f"Inventory size must be >= 2, got {self.size}", code="invalid-inventory")
        if len(self.phone_of_class) != self.size:
            raise ValidationError(
                f"Inventory '{self.language_id}' declares {self.size} classes "
                f"but maps {len(self.phone_of_class)}",
                code="invalid-inventory",
            )
        for index, phone in enumerate(self.phone_of_class):
            if not phone or any(ch.isspace() for ch in phone):
                raise ValidationError(
                    f"Class {index} has an empty or blank phone label", code="invalid-inventory"
                )
        if self.silence_phone not in self.phone_of_class:
            raise ValidationError(
                f"Silence phone '{self.silence_phone}' is not used by any class",
                code="invalid-inventory",
            )

    def phone(self, class_index: int) -> str:
        return self.phone_of_class[class_index]

    def is_silence(self, class_index: int) -> bool:
        return self.phone_of_class[class_index] == self.silence_phone

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ClassInventory":
        """Create ClassInventory from dictionary."""
        return cls(
            language_id=data["language_id"],
            size=int(data["size"]),
            phone_of_class=tuple(data["phone_of_class"]),
            silence_phone=data["silence_phone"],
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "language_id": self.language_id,
            "size": self.size,
            "phone_of_class": list(self.phone_of_class),
            "silence_phone": self.silence_phone,
        }

    def to_text(self) -> str:
        """Render the plain-text inventory format."""
        lines = [
            f"language_id {self.language_id}",
            f"size {self.size}",
            f"silence_phone {self.silence_phone}",
        ]
        lines.extend(f"{index} {phone}" for index, phone in enumerate(self.phone_of_class))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ClassInventory":
        """Parse the plain-text inventory format.

        Header lines ``language_id``, ``size`` and ``silence_phone`` may
        appear in any order before or between the ``index phone`` lines.
        Blank lines and ``#`` comments are ignored.
        """
        header: Dict[str, str] = {}
        pairs: List[Tuple[int, str]] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FormatError(f"Inventory line {lineno}: expected two fields", code="bad-inventory")
            key, value = parts
            if key in HEADER_KEYS:
                header[key] = value
                continue
            try:
                pairs.append((int(key), value))
            except ValueError:
                raise FormatError(f"Inventory line {lineno}: unknown key '{key}'", code="bad-inventory")

        missing = [key for key in HEADER_KEYS if key not in header]
        if missing:
            raise FormatError(f"Inventory is missing header(s): {', '.join(missing)}", code="bad-inventory")

        try:
            size = int(header["size"])
        except ValueError:
            raise FormatError(f"Inventory size '{header['size']}' is not an integer", code="bad-inventory")
        phones = dict(pairs)
        if len(phones) != len(pairs) or sorted(phones) != list(range(len(phones))):
            raise FormatError("Inventory class indices must be 0..size-1 without repeats", code="bad-inventory")

        return cls(
            language_id=header["language_id"],
            size=size,
            phone_of_class=tuple(phones[index] for index in range(len(phones))),
            silence_phone=header["silence_phone"],
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())

    @classmethod
    def load(cls, path: str) -> "ClassInventory":
        try:
            with open(path, "r", encoding="utf-8") as f:
                return cls.from_text(f.read())
        except FileNotFoundError:
            raise FileAccessError(f"No such inventory file: {path}")
