"""Copy-paste-replace, mechanized.

Given a new request/response pair, :func:`plan` works out every source
file to create and every anchored site to patch in an existing project;
:func:`generate` carries the plan out (or just reports it).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from string import Template

from ..errors import PolldeskError

ANCHOR_PREFIX = "scaffold:"
APPLICATION_CODE_START = 100

# kind -> (annotation, default expression, needs dataclasses.field)
FIELD_KINDS: dict[str, tuple[str, str, bool]] = {
    "string": ("str", '""', False),
    "int": ("int", "0", False),
    "float": ("float", "0.0", False),
    "bool": ("bool", "False", False),
    "bytes": ("bytes", 'b""', False),
    "list": ("list", "field(default_factory=list)", True),
    "map": ("dict", "field(default_factory=dict)", True),
}

# every site category a new request/response pair touches
CATEGORIES = (
    "request",
    "response",
    "stream",
    "worker",
    "factory",
    "type-codes",
    "dispatch-imports",
    "dispatch-registration",
    "client-imports",
    "client-accessor",
    "sentinel",
)

_BASE_RE = re.compile(r"^[A-Z][A-Za-z0-9]*$")
_FIELD_RE = re.compile(r"^[a-z_][a-z0-9_]*$")
_REGISTER_RE = re.compile(r'REGISTRY\.register\(\s*"(\w+)"\s*,\s*(\d+)\s*\)')


class ScaffoldError(PolldeskError):
    pass


class NameCollision(ScaffoldError):
    pass


class UnrecognizedProject(ScaffoldError):
    pass


class AnchorMissing(ScaffoldError):
    pass


class WriteFailure(ScaffoldError):
    pass


@dataclass(frozen=True)
class MessageSpec:
    base_name: str
    request_fields: tuple[tuple[str, str], ...] = ()
    response_fields: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not _BASE_RE.match(self.base_name):
            raise ScaffoldError(f"base name {self.base_name!r} must be a CamelCase identifier")
        for side, fields in (("request", self.request_fields), ("response", self.response_fields)):
            names = [name for name, _ in fields]
            if len(set(names)) != len(names):
                raise ScaffoldError(f"duplicate {side} field names: {names}")
            for name, kind in fields:
                if not _FIELD_RE.match(name) or name.startswith("__"):
                    raise ScaffoldError(f"bad {side} field name {name!r}")
                if kind not in FIELD_KINDS:
                    raise ScaffoldError(f"unknown field kind {kind!r}; pick one of {', '.join(FIELD_KINDS)}")

    @property
    def snake(self) -> str:
        return re.sub(r"(?<!^)(?=[A-Z])", "_", self.base_name).lower()

    @property
    def upper(self) -> str:
        return self.snake.upper()


def parse_fields(text: str) -> tuple[tuple[str, str], ...]:
    """``"name:kind,other:kind"`` -> ``(("name", "kind"), ("other", "kind"))``."""
    fields = []
    for item in filter(None, (part.strip() for part in text.split(","))):
        name, sep, kind = item.partition(":")
        if not sep:
            raise ScaffoldError(f"field {item!r} must look like name:kind")
        fields.append((name.strip(), kind.strip()))
    return tuple(fields)


@dataclass
class FileWrite:
    path: Path
    content: str
    category: str


@dataclass
class Patch:
    path: Path
    anchor: str
    snippet: str
    category: str


@dataclass
class GenerationPlan:
    spec: MessageSpec
    root: Path
    request_code: int
    response_code: int
    files: list[FileWrite] = field(default_factory=list)
    patches: list[Patch] = field(default_factory=list)

    @property
    def categories(self) -> set[str]:
        return {f.category for f in self.files} | {p.category for p in self.patches}

    @property
    def names(self) -> dict[str, str]:
        base, snake, upper = self.spec.base_name, self.spec.snake, self.spec.upper
        return {
            "request": f"{base}Request",
            "response": f"{base}Response",
            "stream": f"{base}Stream",
            "worker": f"{base}RequestThread",
            "factory": f"{base}RequestThreadCreator",
            "dispatcher": f"{snake}_request_dispatcher",
            "accessor": f"get_{snake}",
            "sentinel": f"NO_{upper}_RESPONSE",
            "request_type": f"{upper}_REQUEST",
            "response_type": f"{upper}_RESPONSE",
        }


@dataclass
class GenerationReport:
    dry_run: bool
    written: list[Path] = field(default_factory=list)
    patched: list[tuple[Path, str]] = field(default_factory=list)
    print_only: list[Patch] = field(default_factory=list)

    def lines(self) -> list[str]:
        verb = "would write" if self.dry_run else "wrote"
        out = [f"{verb} {p}" for p in self.written]
        verb = "would patch" if self.dry_run else "patched"
        out += [f"{verb} {p} at {ANCHOR_PREFIX}{a}" for p, a in self.patched]
        for patch in self.print_only:
            out.append(f"anchor {ANCHOR_PREFIX}{patch.anchor} missing in {patch.path}; insert by hand:")
            out += ["    " + line for line in patch.snippet.splitlines()]
        return out


def _template(name: str) -> Template:
    text = resources.files("polldesk.scaffold").joinpath("templates", name).read_text(encoding="utf-8")
    return Template(text)


def _field_lines(fields: tuple[tuple[str, str], ...]) -> str:
    if not fields:
        return ""
    lines = [f"    {name}: {FIELD_KINDS[kind][0]} = {FIELD_KINDS[kind][1]}" for name, kind in fields]
    return "\n" + "\n".join(lines)


def _dataclass_imports(fields: tuple[tuple[str, str], ...]) -> str:
    return "dataclass, field" if any(FIELD_KINDS[kind][2] for _, kind in fields) else "dataclass"


def _process_body(spec: MessageSpec) -> str:
    """Answer with same-named request fields copied over; other strings echo their own name."""
    request_kinds = dict(spec.request_fields)
    args = []
    copies = False
    for name, kind in spec.response_fields:
        if request_kinds.get(name) == kind:
            args.append(f"{name}=message.{name}")
            copies = True
        elif kind == "string":
            args.append(f'{name}="{name}"')
    lines = []
    if copies:
        lines.append("        message = request.typed")
    lines.append(f"        return {spec.base_name}Response({', '.join(args)})")
    return "\n".join(lines)


def render_files(spec: MessageSpec) -> dict[str, str]:
    """File name -> content for the five per-message source files."""
    values = {
        "base": spec.base_name,
        "snake": spec.snake,
        "upper": spec.upper,
        "request_fields": _field_lines(spec.request_fields),
        "response_fields": _field_lines(spec.response_fields),
        "process_body": _process_body(spec),
    }
    files = {}
    for template, suffix, side in (
        ("request.py.tmpl", "request", spec.request_fields),
        ("response.py.tmpl", "response", spec.response_fields),
        ("stream.py.tmpl", "stream", ()),
        ("request_thread.py.tmpl", "request_thread", ()),
        ("request_thread_creator.py.tmpl", "request_thread_creator", ()),
    ):
        text = _template(template).substitute(values, dataclass_imports=_dataclass_imports(side))
        files[f"{spec.snake}_{suffix}.py"] = text.rstrip("\n") + "\n"
    return files


def _render_snippet(name: str, spec: MessageSpec, **extra) -> str:
    return _template(name).substitute(base=spec.base_name, snake=spec.snake, upper=spec.upper, **extra)


def _registered_types(source: str) -> dict[str, int]:
    return {name: int(code) for name, code in _REGISTER_RE.findall(source)}


def plan(spec: MessageSpec, project_root: str | Path) -> GenerationPlan:
    """Work out every file and patch for ``spec`` without touching the disk."""
    root = Path(project_root)
    messages_py = root / "messages.py"
    if not messages_py.is_file():
        raise UnrecognizedProject(f"{root} has no messages.py; not a polldesk project")
    registered = _registered_types(messages_py.read_text(encoding="utf-8"))
    for name in (f"{spec.upper}_REQUEST", f"{spec.upper}_RESPONSE"):
        if name in registered:
            raise NameCollision(f"{name} is already registered in {messages_py}")
    files = render_files(spec)
    for filename in files:
        if (root / filename).exists():
            raise NameCollision(f"{root / filename} already exists")

    app_codes = [code for code in registered.values() if code >= APPLICATION_CODE_START]
    request_code = max(app_codes, default=APPLICATION_CODE_START - 1) + 1
    response_code = request_code + 1

    result = GenerationPlan(spec, root, request_code, response_code)
    for filename, content in files.items():
        category = filename[len(spec.snake) + 1:-3]
        category = {"request_thread": "worker", "request_thread_creator": "factory"}.get(category, category)
        result.files.append(FileWrite(root / filename, content, category))

    snippets = (
        ("messages.py", "type-codes", "type_codes.snippet.tmpl", "type-codes"),
        ("message_config.py", "sentinels", "sentinel.snippet.tmpl", "sentinel"),
        ("server_dispatcher.py", "imports", "dispatch_imports.snippet.tmpl", "dispatch-imports"),
        ("server_dispatcher.py", "dispatch-routes", "dispatch_route.snippet.tmpl", "dispatch-registration"),
        ("client_reader.py", "imports", "client_imports.snippet.tmpl", "client-imports"),
        ("client_reader.py", "client-accessors", "client_accessor.snippet.tmpl", "client-accessor"),
    )
    for filename, anchor, template, category in snippets:
        snippet = _render_snippet(template, spec, request_code=request_code, response_code=response_code)
        result.patches.append(Patch(root / filename, anchor, snippet, category))
    return result


def _insert_at_anchor(source: str, anchor: str, snippet: str) -> str:
    lines = source.splitlines(keepends=True)
    marker = f"# {ANCHOR_PREFIX}{anchor}"
    for index, line in enumerate(lines):
        if line.strip() == marker:
            indent = line[: len(line) - len(line.lstrip())]
            block = [(indent + s if s.strip() else "") + "\n" for s in snippet.rstrip("\n").split("\n")]
            return "".join(lines[:index] + block + lines[index:])
    raise AnchorMissing(f"no '{marker}' line")


def generate(generation_plan: GenerationPlan, apply: bool = False) -> GenerationReport:
    """Write the planned files and patch anchored sites; with ``apply=False`` only report."""
    # refuse if anything appeared since planning (or this plan already ran)
    fresh = plan(generation_plan.spec, generation_plan.root)
    if fresh.request_code != generation_plan.request_code:
        raise NameCollision("project changed since the plan was made; plan again")

    report = GenerationReport(dry_run=not apply)
    patched_sources: dict[Path, str] = {}
    for patch in generation_plan.patches:
        try:
            source = patched_sources.get(patch.path)
            if source is None:
                source = patch.path.read_text(encoding="utf-8")
            patched_sources[patch.path] = _insert_at_anchor(source, patch.anchor, patch.snippet)
            report.patched.append((patch.path, patch.anchor))
        except (AnchorMissing, FileNotFoundError):
            report.print_only.append(patch)
    report.written = [f.path for f in generation_plan.files]
    if not apply:
        return report
    try:
        for file in generation_plan.files:
            with open(file.path, "x", encoding="utf-8") as fh:
                fh.write(file.content)
        for path, source in patched_sources.items():
            path.write_text(source, encoding="utf-8")
    except OSError as exc:
        raise WriteFailure(str(exc)) from exc
    return report
