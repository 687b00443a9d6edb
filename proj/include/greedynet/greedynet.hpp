// Umbrella header.
#pragma once

#include "greedynet/bench.hpp"
#include "greedynet/checkpoint.hpp"
#include "greedynet/dataset.hpp"
#include "greedynet/exporters.hpp"
#include "greedynet/matrix.hpp"
#include "greedynet/network.hpp"
#include "greedynet/pretrain_greedy.hpp"
#include "greedynet/pretrain_layerwise.hpp"
#include "greedynet/rng.hpp"
#include "greedynet/trainer.hpp"
