"""Python interface to the deltagnn toolkit."""

import json

from ._deltagnn import Error, autotune, beta_schedule, comet_schedule, run_cli, sample

__all__ = ["Error", "autotune", "beta_schedule", "comet_schedule", "run_cli", "sample", "cli_json"]


def cli_json(*args):
    """Runs a subcommand and returns its last JSON line as a dict."""
    rc, out, err = run_cli([str(a) for a in args])
    if rc != 0:
        raise Error(err.strip() or f"deltagnn {args[0]} exited with {rc}")
    lines = [line for line in out.splitlines() if line.startswith("{")]
    return json.loads(lines[-1]) if lines else {}
