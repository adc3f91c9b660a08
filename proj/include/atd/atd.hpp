#pragma once

#include "atd/cli.hpp"
#include "atd/detector.hpp"
#include "atd/document.hpp"
#include "atd/engine.hpp"
#include "atd/glob.hpp"
#include "atd/html.hpp"
#include "atd/lexicon.hpp"
#include "atd/pipeline.hpp"
#include "atd/planner.hpp"
#include "atd/proxy.hpp"
#include "atd/ruleset.hpp"
#include "atd/transforms.hpp"
#include "atd/unicode.hpp"
