from pathlib import Path

from clod.errors import EXIT_OK

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def list_scenarios() -> list[Path]:
    return sorted(SCENARIO_DIR.glob("*.cfg"))


def resolve_scenario(name: str) -> Path:
    """A path as given, or the bundled scenario with that name."""
    path = Path(name)
    if path.exists():
        return path
    bundled = SCENARIO_DIR / (name if name.endswith(".cfg") else f"{name}.cfg")
    return bundled if bundled.exists() else path


def cmd_scenarios() -> int:
    for path in list_scenarios():
        first = path.read_text().splitlines()[0] if path.stat().st_size else ""
        note = first.lstrip("# ").strip() if first.startswith("#") else ""
        print(f"{path.stem:28s} {note}")
    return EXIT_OK
