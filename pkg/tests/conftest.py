from retarget.corpus import read_text
from retarget.mapping import parse_registry


def registry_with(extra_lines: str):
    """Shipped table plus extra directives (usually entry signatures)."""
    return parse_registry(read_text("builtins.map") + "\n" + extra_lines + "\n")
