#pragma once

// Umbrella header.

#include "motionaug/augmentation.hpp"
#include "motionaug/config.hpp"
#include "motionaug/dataset.hpp"
#include "motionaug/embeddings.hpp"
#include "motionaug/error.hpp"
#include "motionaug/protocol.hpp"
#include "motionaug/random.hpp"
#include "motionaug/report.hpp"
#include "motionaug/signal.hpp"
#include "motionaug/svm.hpp"
#include "motionaug/synth.hpp"
