"""Differential check: the CFG interpreter agrees with gcc-compiled code.

The lowered graph executed concretely must produce the same observable
result (return value, global writes) as the original source compiled with
an ordinary C compiler, across a randomized corpus of small inputs.
"""

import random
import subprocess

import pytest

from conftest import GCC_FLAGS, compile_c, data_path, read_data

from cunitgen.config import Config
from cunitgen.frontend import extract_annotations
from cunitgen.frontend.parser import parse_unit
from cunitgen.imr import lower
from cunitgen.replay import concrete_replay
from cunitgen.symex import Layout

ARITH_SRC = """
int mash(int a, int b, int c)
{
    int r = a;
    if (a > b) { r = r + b * 3; } else { r = r - c; }
    if ((a & 1) == 1) { r = r ^ c; }
    while (r > 100) { r = r - (b & 15) - 7; }
    switch (c & 3) {
    case 0: r = r + 1; break;
    case 1: r = r + 2; break;
    default: r = r - 1;
    }
    return r;
}
"""

UNSIGNED_SRC = """
unsigned int umix(unsigned int a, unsigned int b)
{
    unsigned int r = a * 31U + b;
    if (a > b) { r = r - b; }
    if (r > 1000U) { r = r % 97U; }
    return r;
}
"""


def build_replayable(src: str, fn_name: str, file_name: str):
    unit = parse_unit(src, file_name)
    fn = unit.function(fn_name)
    anns = extract_annotations(fn)
    cfg = lower(unit, fn)
    layout = Layout(unit, fn, cfg, anns, Config())
    return cfg, layout, anns, fn


def gcc_reference(tmp_path, src: str, fn_name: str, n_params: int,
                  param_type: str = "int"):
    main = [f'#include <stdio.h>', f"#include <stdlib.h>"]
    params = ", ".join(f"{param_type} p{i}" for i in range(n_params))
    main.append(f"extern {param_type} {fn_name}({params});")
    main.append("int main(int argc, char **argv){ (void)argc;")
    args = []
    for i in range(n_params):
        conv = "strtoul" if param_type.startswith("unsigned") else "atoi"
        main.append(f"    {param_type} p{i} = ({param_type}){conv}(argv[{i + 1}]"
                    + (", 0, 10);" if conv == "strtoul" else ");"))
        args.append(f"p{i}")
    fmt = "%u" if param_type.startswith("unsigned") else "%d"
    main.append(f'    printf("{fmt}\\n", {fn_name}({", ".join(args)}));')
    main.append("    return 0; }")
    src_path = tmp_path / "uut.c"
    src_path.write_text(src)
    main_path = tmp_path / "main.c"
    main_path.write_text("\n".join(main) + "\n")
    return compile_c(str(tmp_path), [str(src_path), str(main_path)], exe="ref")


@pytest.mark.parametrize("src,fn_name,n_params,ptype,lo,hi", [
    (ARITH_SRC, "mash", 3, "int", -50, 150),
    (UNSIGNED_SRC, "umix", 2, "unsigned int", 0, 5000),
    (read_data("tritype_int.c"), "Tritype", 3, "int", -3, 8),
])
def test_cfg_execution_matches_gcc(tmp_path, src, fn_name, n_params, ptype, lo, hi):
    cfg, layout, anns, fn = build_replayable(src, fn_name, f"{fn_name}.c")
    exe = gcc_reference(tmp_path, src, fn_name, n_params, ptype)
    rng = random.Random(20240817)
    for _ in range(120):
        values = [rng.randint(lo, hi) for _ in range(n_params)]
        model = {p.name: v for p, v in zip(fn.params, values)}
        result = concrete_replay(cfg, layout, anns, model, {})
        proc = subprocess.run([exe, *map(str, values)],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        expected = int(proc.stdout.strip())
        got = result.returned
        if ptype.startswith("unsigned"):
            expected &= 0xFFFFFFFF
            got &= 0xFFFFFFFF
        assert got == expected, (values, got, expected)
