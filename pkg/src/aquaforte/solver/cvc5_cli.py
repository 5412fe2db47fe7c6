"""Minimal cvc5 command line on top of the cvc5 Python bindings.

Used when no cvc5 executable is installed. Accepts ``--option`` and
``--option=value`` flags followed by one .smt2 file and prints what the
commands print, as the real binary does.
"""

from __future__ import annotations

import sys


def main(argv=None) -> int:
    import cvc5

    args = list(sys.argv[1:] if argv is None else argv)
    opts, files = [], []
    for a in args:
        if a.startswith("--"):
            key, _, val = a[2:].partition("=")
            opts.append((key, val or "true"))
        else:
            files.append(a)
    if len(files) != 1:
        print("usage: aquaforte-cvc5 [--opt[=val]]... FILE.smt2", file=sys.stderr)
        return 2

    tm = cvc5.TermManager()
    solver = cvc5.Solver(tm)
    try:
        for key, val in opts:
            solver.setOption(key, val)
    except RuntimeError as err:
        print(f'(error "{err}")')
        return 1
    sm = cvc5.SymbolManager(tm)
    parser = cvc5.InputParser(solver, sm)
    try:
        parser.setFileInput(cvc5.InputLanguage.SMT_LIB_2_6, files[0])
        while True:
            cmd = parser.nextCommand()
            if cmd.isNull():
                break
            sys.stdout.write(cmd.invoke(solver, sm))
            sys.stdout.flush()
    except RuntimeError as err:
        msg = str(err).replace('"', "'")
        print(f'(error "{msg}")')
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
