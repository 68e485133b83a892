#pragma once

#include "lpam/core.hpp"
#include "lpam/diagnostics.hpp"
#include "lpam/dft.hpp"
#include "lpam/extractor.hpp"
#include "lpam/fd_check.hpp"
#include "lpam/instance.hpp"
#include "lpam/io.hpp"
#include "lpam/joint_recovery.hpp"
#include "lpam/quadratic.hpp"
#include "lpam/smoothing.hpp"
#include "lpam/solver.hpp"
