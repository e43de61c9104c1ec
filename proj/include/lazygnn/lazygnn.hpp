#pragma once

#include "lazygnn/dataset.hpp"
#include "lazygnn/graph.hpp"
#include "lazygnn/io.hpp"
#include "lazygnn/matrix.hpp"
#include "lazygnn/memory.hpp"
#include "lazygnn/mlp.hpp"
#include "lazygnn/propagation.hpp"
#include "lazygnn/rng.hpp"
#include "lazygnn/trainer.hpp"
