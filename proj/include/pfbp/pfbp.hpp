#pragma once

#include "errors.hpp"
#include "tridiagonal.hpp"
#include "periodic.hpp"
#include "parabolic.hpp"
#include "eigen.hpp"
#include "semiwave.hpp"
#include "critical.hpp"
#include "fbp.hpp"
#include "classify.hpp"
#include "csv.hpp"
#include "config.hpp"
#include "runner.hpp"
