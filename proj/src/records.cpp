#include "kgc/records.hpp"

#include "kgc/error.hpp"
#include "kgc/io.hpp"

namespace kgc::records {

json path_to_json(const KgPath& path) {
    if (!path.has_names()) throw DanglingEntity(path.source());
    json arr = json::array();
    const auto& names = path.names();
    for (std::size_t i = 0; i < path.length(); ++i) {
        const auto& t = path.triples()[i];
        arr.push_back({{"head", t.head},
                       {"head_name", names[i]},
                       {"relation", t.relation},
                       {"tail", t.tail},
                       {"tail_name", names[i + 1]}});
    }
    return arr;
}

KgPath path_from_json(const json& j) {
    std::vector<Triple> triples;
    std::vector<std::string> names;
    for (const auto& hop : j) {
        triples.push_back(Triple{hop.at("head").get<std::string>(), hop.at("relation").get<std::string>(),
                                 hop.at("tail").get<std::string>()});
        if (names.empty()) names.push_back(hop.at("head_name").get<std::string>());
        names.push_back(hop.at("tail_name").get<std::string>());
    }
    return KgPath(std::move(triples), std::move(names));
}

json task_to_json(const QaTask& task) {
    json j;
    j["question"] = task.vignette;
    json opts = json::array();
    for (const auto& o : task.options) opts.push_back({{"label", std::string(1, o.label)}, {"text", o.text}});
    j["options"] = std::move(opts);
    j["answer"] = std::string(1, task.answer);
    if (task.path) {
        j["path"] = path_to_json(*task.path);
        j["hops"] = task.path->length();
    }
    j["source_meta"] = {{"model", task.meta.model}, {"timestamp", task.meta.timestamp}};
    return j;
}

QaTask task_from_json(const json& j) {
    try {
        QaTask t;
        t.vignette = j.at("question").get<std::string>();
        for (const auto& o : j.at("options")) {
            const auto label = o.at("label").get<std::string>();
            if (label.size() != 1) throw FormatViolation("option label");
            t.options.push_back(Option{label[0], o.at("text").get<std::string>()});
        }
        const auto ans = j.at("answer").get<std::string>();
        if (ans.size() != 1) throw FormatViolation("answer label");
        t.answer = ans[0];
        if (auto p = j.find("path"); p != j.end()) t.path = path_from_json(*p);
        if (auto m = j.find("source_meta"); m != j.end()) {
            t.meta.model = m->value("model", std::string{});
            t.meta.timestamp = m->value("timestamp", std::string{});
        }
        t.validate();
        return t;
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("malformed task record: ") + e.what());
    }
}

json item_to_json(const CurriculumItem& item) {
    json j = task_to_json(item.task);
    j["id"] = item.id;
    j["trace"] = {{"text", item.trace.text}, {"model", item.trace.model_name}, {"tokens", item.trace.token_count}};
    json verdicts = json::array();
    for (const auto& v : item.verdicts) {
        verdicts.push_back({{"grader", v.grader_name}, {"decision", to_string(v.decision)}, {"raw", v.raw}});
    }
    j["verdicts"] = std::move(verdicts);
    j["accepted"] = item.accepted;
    return j;
}

CurriculumItem item_from_json(const json& j) {
    try {
        CurriculumItem item;
        item.task = task_from_json(j);
        item.id = j.at("id").get<std::string>();
        const auto& tr = j.at("trace");
        item.trace = ReasoningTrace{tr.at("text").get<std::string>(), tr.value("model", std::string{}),
                                    tr.value("tokens", 0)};
        for (const auto& v : j.at("verdicts")) {
            item.verdicts.push_back(GraderVerdict{v.at("grader").get<std::string>(),
                                                  decision_from_string(v.at("decision").get<std::string>()),
                                                  v.value("raw", std::string{})});
        }
        item.accepted = j.at("accepted").get<bool>();
        return item;
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("malformed dataset record: ") + e.what());
    }
}

std::vector<CurriculumItem> read_dataset(const std::filesystem::path& path) {
    std::vector<CurriculumItem> items;
    for (const auto& j : io::read_jsonl(path)) items.push_back(item_from_json(j));
    return items;
}

void write_dataset(const std::filesystem::path& path, const std::vector<CurriculumItem>& items) {
    io::AtomicWriter w(path);
    for (const auto& item : items) w.write_line(item_to_json(item));
    w.commit();
}

void validate_item(const CurriculumItem& item) {
    item.task.validate();
    if (!item.task.path) throw InvalidConfig("item '" + item.id + "' has no path");
    if (item.verdicts.size() != 2) throw InvalidConfig("item '" + item.id + "' must carry two grader verdicts");
    const bool both_yes = two_factor_accept(item.verdicts[0].decision, item.verdicts[1].decision);
    if (item.accepted != both_yes) throw InvalidConfig("item '" + item.id + "' accepted flag disagrees with verdicts");
    if (item.accepted && item.trace.text.empty()) throw InvalidConfig("item '" + item.id + "' has an empty trace");
}

}  // namespace kgc::records
