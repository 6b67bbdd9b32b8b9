"""Package version and the identifier of the element-ordering convention."""

__version__ = "0.1.0"


def version_string() -> str:
    """Version tag embedding the group element ordering convention.

    Serialized element indices are only meaningful under a fixed ordering,
    so the ordering identifier travels with every experiment summary.
    """
    from .groups import ELEMENT_ORDER_CONVENTION

    return f"mra-lab-{__version__}+{ELEMENT_ORDER_CONVENTION}"
