"""Worked example: one scalar expression and two hand vectorizations of it.

``x = ((v1*v2)*(v3*v4) + (v3*v4)*(v5*v6)) * ((v7*v8)*(v9*v10))``

Both vectorized programs leave ``x`` in slot 0. Under the toy table
(multiplications and rotations 1, additions 0.1) they cost 8.1 and 10.1
against 9.1 for the scalar original.
"""

from .ir import Program, parse

_INPUTS = "(inputs " + " ".join(f"(ct v{i})" for i in range(1, 11)) + ")"

# nine distinct multiplications (v3*v4 is shared) and one addition
EQ1 = f"""(program {_INPUTS} (output-width 1)
  (Vec (* (+ (* (* v1 v2) (* v3 v4)) (* (* v3 v4) (* v5 v6)))
          (* (* v7 v8) (* v9 v10)))))"""

# the same value after commuting and factoring out v3*v4
EQ2 = f"""(program {_INPUTS} (output-width 1)
  (Vec (* (* (* v3 v4) (+ (* v1 v2) (* v5 v6)))
          (* (* v7 v8) (* v9 v10)))))"""

# 6 vector multiplications, 1 addition, 2 rotations
FIG_A = f"""(program {_INPUTS} (output-width 1)
  (VecMul
    (VecMul
      (VecAdd (VecMul (Vec v1 v5) (Vec v2 v6))
              (<< (VecMul (Vec v1 v5) (Vec v2 v6)) 1))
      (VecMul (Vec v3 v7) (Vec v4 v8)))
    (<< (VecMul (VecMul (Vec v3 v7) (Vec v4 v8))
                (VecMul (Vec v9 v9) (Vec v10 v10))) 1)))"""

# 7 vector multiplications, 1 addition, 3 rotations
FIG_B = f"""(program {_INPUTS} (output-width 1)
  (VecMul
    (VecAdd
      (VecMul (VecMul (Vec v1 v3 v7 v9) (Vec v2 v4 v8 v10))
              (<< (VecMul (Vec v1 v3 v7 v9) (Vec v2 v4 v8 v10)) 1))
      (VecMul (VecMul (Vec v3 v3 v3 v3) (Vec v4 v4 v4 v4))
              (VecMul (Vec v5 v5 v5 v5) (Vec v6 v6 v6 v6))))
    (VecMul (<< (VecMul (Vec v1 v3 v7 v9) (Vec v2 v4 v8 v10)) 2)
            (<< (VecMul (Vec v1 v3 v7 v9) (Vec v2 v4 v8 v10)) 3))))"""


def programs() -> dict[str, Program]:
    return {"eq1": parse(EQ1), "eq2": parse(EQ2), "fig_a": parse(FIG_A), "fig_b": parse(FIG_B)}
