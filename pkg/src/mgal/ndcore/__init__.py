from mgal.ndcore.gradcheck import GradCheckReport, finite_diff_check
from mgal.ndcore.rng import make_rng
from mgal.ndcore.sparse import SparseMatrix, csr_matmul
from mgal.ndcore.tape import (
    LOG_FLOOR,
    Tape,
    Var,
    add,
    concat_cols,
    log,
    matmul,
    mean_all,
    mul,
    relu,
    row_select,
    scale,
    softmax_rows,
    spmm,
    sub,
    sum_all,
)

__all__ = [
    "GradCheckReport", "finite_diff_check", "make_rng", "SparseMatrix", "csr_matmul",
    "LOG_FLOOR", "Tape", "Var", "add", "concat_cols", "log", "matmul", "mean_all", "mul",
    "relu", "row_select", "scale", "softmax_rows", "spmm", "sub", "sum_all",
]
