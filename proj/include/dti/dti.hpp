#pragma once

#include "dti/config.hpp"
#include "dti/corpus.hpp"
#include "dti/crawler.hpp"
#include "dti/csv.hpp"
#include "dti/dti_engine.hpp"
#include "dti/error.hpp"
#include "dti/eval.hpp"
#include "dti/html_text.hpp"
#include "dti/io.hpp"
#include "dti/kpi.hpp"
#include "dti/mlp.hpp"
#include "dti/pipeline.hpp"
#include "dti/readiness.hpp"
#include "dti/report.hpp"
#include "dti/rng.hpp"
#include "dti/robots.hpp"
#include "dti/survey.hpp"
#include "dti/text_features.hpp"
#include "dti/url.hpp"

namespace dti {
inline constexpr const char* kVersion = "1.0.0";
}
