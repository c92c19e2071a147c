#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "kgc/graph.hpp"
#include "kgc/qa.hpp"
#include "kgc/trace.hpp"

namespace kgc::records {

using nlohmann::json;

/// [{head, head_name, relation, tail, tail_name}, ...]; names must be present.
json path_to_json(const KgPath& named_path);
KgPath path_from_json(const json& j);

/// question, options [{label, text}], answer, path, source_meta, hops.
json task_to_json(const QaTask& task);
QaTask task_from_json(const json& j);

/// Task fields plus id, trace, verdicts and accepted.
json item_to_json(const CurriculumItem& item);
CurriculumItem item_from_json(const json& j);

std::vector<CurriculumItem> read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const std::vector<CurriculumItem>& items);

/// Throws FormatViolation/InvalidConfig if any QaTask or CurriculumItem
/// invariant is broken.
void validate_item(const CurriculumItem& item);

}  // namespace kgc::records
