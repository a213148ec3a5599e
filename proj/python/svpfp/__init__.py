from ._svpfp import (
    SvpfpError,
    command_names,
    density,
    load_snapshot,
    philox4x32,
    run_command,
    save_snapshot,
    solve_poisson,
)

__all__ = [
    "SvpfpError",
    "command_names",
    "density",
    "load_snapshot",
    "philox4x32",
    "run_command",
    "save_snapshot",
    "solve_poisson",
]
