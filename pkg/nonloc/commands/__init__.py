from nonloc.commands import apply, check, demo, minimize, preset, residual, semilinear

COMMANDS = [apply, minimize, semilinear, residual, check, preset, demo]
