#pragma once

#include <string>
#include <string_view>

#include "toolgrade/dataset.hpp"

namespace toolgrade {

/// Lowercases and collapses runs of non-alphanumeric characters to a single
/// underscore (no leading/trailing underscore). Makes api_name <-> ApiDoc
/// resolution deterministic despite noisy real-world docs.
std::string normalize_tool_name(std::string_view name);

/// Convert one ToolBench-shaped record (multi-call, RapidAPI-style docs,
/// reasoning interleaved with function calls in the solution path) into an
/// Instance. Call names carrying the "<api>_for_<tool>" suffix convention are
/// normalized against the record's api_list. Throws DataError on records
/// missing the instruction or the solution path.
Instance adapt_toolbench(const ordered_json& record, std::string_view fallback_id = {});

/// Convert one ToolAlpaca-shaped record (single tool, 1-2 related calls in
/// intermediate steps) into an Instance. Throws DataError when the API
/// documentation block is missing.
Instance adapt_toolalpaca(const ordered_json& record, std::string_view fallback_id = {});

}  // namespace toolgrade
