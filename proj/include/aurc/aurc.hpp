#pragma once

#include "aurc/estimators.hpp"
#include "aurc/harness.hpp"
#include "aurc/io.hpp"
#include "aurc/losses.hpp"
#include "aurc/numeric.hpp"
#include "aurc/ranking.hpp"
#include "aurc/rng.hpp"
#include "aurc/special_functions.hpp"
#include "aurc/stat_props.hpp"
