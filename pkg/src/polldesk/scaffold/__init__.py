from .generator import (
    CATEGORIES,
    FIELD_KINDS,
    AnchorMissing,
    FileWrite,
    GenerationPlan,
    GenerationReport,
    MessageSpec,
    NameCollision,
    Patch,
    ScaffoldError,
    UnrecognizedProject,
    WriteFailure,
    generate,
    parse_fields,
    plan,
    render_files,
)

__all__ = [
    "CATEGORIES",
    "FIELD_KINDS",
    "AnchorMissing",
    "FileWrite",
    "GenerationPlan",
    "GenerationReport",
    "MessageSpec",
    "NameCollision",
    "Patch",
    "ScaffoldError",
    "UnrecognizedProject",
    "WriteFailure",
    "generate",
    "parse_fields",
    "plan",
    "render_files",
]
