// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "aquaseg/array.hpp"
#include "aquaseg/bench.hpp"
#include "aquaseg/classifier.hpp"
#include "aquaseg/config.hpp"
#include "aquaseg/csa.hpp"
#include "aquaseg/error.hpp"
#include "aquaseg/gmg.hpp"
#include "aquaseg/interpolate.hpp"
#include "aquaseg/manifest.hpp"
#include "aquaseg/metrics.hpp"
#include "aquaseg/npy.hpp"
#include "aquaseg/reasoning.hpp"
#include "aquaseg/registry.hpp"
#include "aquaseg/report.hpp"
