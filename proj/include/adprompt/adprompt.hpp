#pragma once

// Umbrella header.

#include "adprompt/chat_parser.hpp"
#include "adprompt/errors.hpp"
#include "adprompt/exemplar_pool.hpp"
#include "adprompt/harness.hpp"
#include "adprompt/label.hpp"
#include "adprompt/llm_client.hpp"
#include "adprompt/manifest.hpp"
#include "adprompt/metrics.hpp"
#include "adprompt/mmse_proxy.hpp"
#include "adprompt/pool_builder.hpp"
#include "adprompt/prompt_builder.hpp"
#include "adprompt/prompts.hpp"
#include "adprompt/verdict_parser.hpp"
