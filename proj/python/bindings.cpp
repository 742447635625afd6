#include <pybind11/pybind11.h>
PYBIND11_MODULE(_acqsens, m) { m.doc() = "placeholder"; }
