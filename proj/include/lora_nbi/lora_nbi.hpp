#pragma once

#include "lora_nbi/baseband.hpp"
#include "lora_nbi/channel.hpp"
#include "lora_nbi/css.hpp"
#include "lora_nbi/experiment.hpp"
#include "lora_nbi/experiment_config.hpp"
#include "lora_nbi/fft.hpp"
#include "lora_nbi/fitting.hpp"
#include "lora_nbi/lora_config.hpp"
#include "lora_nbi/parallel.hpp"
#include "lora_nbi/rng.hpp"
#include "lora_nbi/stationary_phase.hpp"
#include "lora_nbi/sweeps.hpp"
#include "lora_nbi/version.hpp"
#include "lora_nbi/waveforms.hpp"
