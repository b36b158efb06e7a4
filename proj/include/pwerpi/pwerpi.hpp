#pragma once

#include "pwerpi/analysis.hpp"
#include "pwerpi/boot.hpp"
#include "pwerpi/config.hpp"
#include "pwerpi/design.hpp"
#include "pwerpi/errors.hpp"
#include "pwerpi/mvprob.hpp"
#include "pwerpi/pwer.hpp"
#include "pwerpi/report.hpp"
#include "pwerpi/rng.hpp"
#include "pwerpi/sim.hpp"
