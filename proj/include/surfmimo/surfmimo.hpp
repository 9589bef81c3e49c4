#pragma once

#include "surfmimo/channel.hpp"
#include "surfmimo/config.hpp"
#include "surfmimo/constants.hpp"
#include "surfmimo/error.hpp"
#include "surfmimo/experiments.hpp"
#include "surfmimo/geometry.hpp"
#include "surfmimo/mimo_analysis.hpp"
#include "surfmimo/propagation.hpp"
#include "surfmimo/results.hpp"
