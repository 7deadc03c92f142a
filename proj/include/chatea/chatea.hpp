#pragma once

// Umbrella header for the whole pipeline.

#include "chatea/aligner.hpp"
#include "chatea/backend.hpp"
#include "chatea/cards.hpp"
#include "chatea/config.hpp"
#include "chatea/csls.hpp"
#include "chatea/descriptions.hpp"
#include "chatea/eval.hpp"
#include "chatea/fusion.hpp"
#include "chatea/hash_encoder.hpp"
#include "chatea/http_backend.hpp"
#include "chatea/kg.hpp"
#include "chatea/matrix.hpp"
#include "chatea/noise.hpp"
#include "chatea/oracle.hpp"
#include "chatea/parse.hpp"
#include "chatea/pipeline.hpp"
#include "chatea/prompts.hpp"
#include "chatea/results_io.hpp"
#include "chatea/rng.hpp"
#include "chatea/skipgram.hpp"
#include "chatea/synthetic.hpp"
#include "chatea/time2vec.hpp"
#include "chatea/transcript.hpp"
#include "chatea/walks.hpp"
#include "chatea/whitening.hpp"
