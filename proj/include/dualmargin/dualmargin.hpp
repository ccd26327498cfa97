#pragma once

#include "certification.hpp"
#include "dataset.hpp"
#include "dual_geometry.hpp"
#include "io.hpp"
#include "kernelized.hpp"
#include "losses.hpp"
#include "multiclass.hpp"
#include "solvers.hpp"
#include "synthetic.hpp"
#include "trace.hpp"
