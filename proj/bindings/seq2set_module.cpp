#include <pybind11/pybind11.h>
PYBIND11_MODULE(_seq2set, m) { m.doc() = "placeholder"; }
