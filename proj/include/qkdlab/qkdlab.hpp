#pragma once

// Core library. scenario.hpp and report.hpp are separate because they pull
// in yaml-cpp and nlohmann/json.

#include "qkdlab/bounds.hpp"
#include "qkdlab/compose.hpp"
#include "qkdlab/errors.hpp"
#include "qkdlab/qinfo.hpp"
#include "qkdlab/qkdsim.hpp"
#include "qkdlab/qmatrix.hpp"
