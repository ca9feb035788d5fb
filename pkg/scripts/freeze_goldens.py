"""Regenerate the byte-exact golden files under tests/golden.

Run after an intentional output change, then review the diff before committing.
"""
import contextlib
import io
import sys
import tempfile
from pathlib import Path

from snnverif import cli, prismgen
from snnverif.snnrf import load_snnrf, serialize

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDEN = ROOT / "tests" / "golden"


def cli_stdout(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli.main(argv)
    if code != 0:
        sys.exit(f"{' '.join(argv)} exited with {code}")
    return buf.getvalue()


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    single = str(FIXTURES / "single_neuron.yaml")
    outputs = {
        "single_neuron.canonical.yaml": serialize(load_snnrf(single)[0]),
        "single_neuron.steps50.seed7.csv": cli_stdout(["simulate", single, "--steps", "50", "--seed", "7"]),
    }
    for name in ("single_neuron", "contralateral_inhibition"):
        spec, _ = load_snnrf(FIXTURES / f"{name}.yaml")
        outputs[f"{name}.pm"] = prismgen.emit_model(spec)
        outputs[f"{name}.props"] = prismgen.emit_properties(spec, spec.properties)
    with tempfile.TemporaryDirectory() as tmp:
        cli_stdout(["export-prism", single, "--out", tmp])
        for path in Path(tmp).iterdir():
            if outputs.get(path.name) != path.read_text(encoding="utf-8"):
                sys.exit(f"export-prism output {path.name} differs from the library output")
    for name, text in sorted(outputs.items()):
        (GOLDEN / name).write_text(text, encoding="utf-8")
        print(f"wrote {GOLDEN / name}")


if __name__ == "__main__":
    main()
