#pragma once

#include "sae/ca.hpp"
#include "sae/errors.hpp"
#include "sae/estimators.hpp"
#include "sae/linalg.hpp"
#include "sae/marchenko_pastur.hpp"
#include "sae/metrics.hpp"
#include "sae/noise.hpp"
#include "sae/random.hpp"
#include "sae/shrinkers.hpp"
