#pragma once

#include "hybridqa/annotation.hpp"
#include "hybridqa/crawler.hpp"
#include "hybridqa/document.hpp"
#include "hybridqa/embedding.hpp"
#include "hybridqa/error.hpp"
#include "hybridqa/fusion.hpp"
#include "hybridqa/generation.hpp"
#include "hybridqa/html.hpp"
#include "hybridqa/ingest.hpp"
#include "hybridqa/lexical_index.hpp"
#include "hybridqa/metrics.hpp"
#include "hybridqa/pipeline.hpp"
#include "hybridqa/qa.hpp"
#include "hybridqa/scored_hit.hpp"
#include "hybridqa/vector_index.hpp"
