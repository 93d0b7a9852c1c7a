"""Python bindings for the grading core."""
from ._eipl import (
    BankError,
    EmptyTextError,
    ExtractionError,
    HarnessError,
    PromptError,
    bucket_of,
    build_prompt,
    classify,
    extract_code,
    fixture_key,
    format_cell,
    format_percent,
    grade,
    list_questions,
    render_report,
    run_candidate,
    standard_template,
    value_equal,
)

__all__ = [
    "BankError",
    "EmptyTextError",
    "ExtractionError",
    "HarnessError",
    "PromptError",
    "bucket_of",
    "build_prompt",
    "classify",
    "extract_code",
    "fixture_key",
    "format_cell",
    "format_percent",
    "grade",
    "list_questions",
    "render_report",
    "run_candidate",
    "standard_template",
    "value_equal",
]
