#pragma once

#include "cullforge/adapters.hpp"
#include "cullforge/core.hpp"
#include "cullforge/costmodel.hpp"
#include "cullforge/errors.hpp"
#include "cullforge/io.hpp"
#include "cullforge/metrics.hpp"
#include "cullforge/optres.hpp"
#include "cullforge/pipeline.hpp"
#include "cullforge/scoring.hpp"
#include "cullforge/synthdet.hpp"
#include "cullforge/topk.hpp"
