#pragma once

#include <starfw/errors.hpp>
#include <starfw/types.hpp>
#include <starfw/geometry.hpp>
#include <starfw/objectives.hpp>
#include <starfw/stepsizes.hpp>
#include <starfw/estimates.hpp>
#include <starfw/solver.hpp>
#include <starfw/verify.hpp>
#include <starfw/io.hpp>
