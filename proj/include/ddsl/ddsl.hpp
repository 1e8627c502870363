#pragma once

#include "ddsl/bitset.hpp"
#include "ddsl/compression.hpp"
#include "ddsl/cost.hpp"
#include "ddsl/error.hpp"
#include "ddsl/estimator.hpp"
#include "ddsl/graph.hpp"
#include "ddsl/incremental.hpp"
#include "ddsl/join_engine.hpp"
#include "ddsl/matcher.hpp"
#include "ddsl/np_storage.hpp"
#include "ddsl/parallel.hpp"
#include "ddsl/pattern.hpp"
#include "ddsl/planner.hpp"
