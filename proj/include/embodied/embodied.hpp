#pragma once

#include "adam.hpp"
#include "checkpoint.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "fingers.hpp"
#include "gradcheck.hpp"
#include "idx.hpp"
#include "layers.hpp"
#include "loss.hpp"
#include "model.hpp"
#include "pretrain.hpp"
#include "records.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "summary.hpp"
#include "svg.hpp"
#include "tensor.hpp"
#include "trainer.hpp"
