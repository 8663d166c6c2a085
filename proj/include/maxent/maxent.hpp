#pragma once

#include "maxent/checker.hpp"
#include "maxent/errors.hpp"
#include "maxent/estimator.hpp"
#include "maxent/evaluator.hpp"
#include "maxent/features.hpp"
#include "maxent/formats.hpp"
#include "maxent/model.hpp"
