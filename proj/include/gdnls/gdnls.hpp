#pragma once

#include "gdnls/core.hpp"
#include "gdnls/evolution.hpp"
#include "gdnls/gauge.hpp"
#include "gdnls/multisoliton.hpp"
#include "gdnls/picard.hpp"
#include "gdnls/soliton.hpp"
#include "gdnls/spectral.hpp"
