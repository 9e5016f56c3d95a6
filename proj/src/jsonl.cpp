#include "redforge/jsonl.hpp"

#include <unordered_map>

#include "redforge/tokenizer.hpp"

namespace redforge {

namespace jsonf {

const json& require(const json& j, const char* key) {
    if (!j.is_object()) throw Error("record is not a JSON object");
    auto it = j.find(key);
    if (it == j.end()) throw Error(std::string("missing field \"") + key + "\"");
    return *it;
}

std::string string_field(const json& j, const char* key) {
    const auto& v = require(j, key);
    if (!v.is_string()) throw Error(std::string("field \"") + key + "\" must be a string");
    return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw Error(std::string("field \"") + key + "\" must be a string or null");
    return it->get<std::string>();
}

std::int64_t nonneg_int(const json& j, const char* key) {
    const auto& v = require(j, key);
    if (!v.is_number_integer()) throw Error(std::string("field \"") + key + "\" must be an integer");
    const auto x = v.get<std::int64_t>();
    if (x < 0) throw Error(std::string("field \"") + key + "\" must be non-negative");
    return x;
}

double number_field(const json& j, const char* key) {
    const auto& v = require(j, key);
    if (!v.is_number()) throw Error(std::string("field \"") + key + "\" must be a number");
    return v.get<double>();
}

}  // namespace jsonf

using namespace jsonf;

Document JsonCodec<Document>::decode(const json& j) {
    std::string id = string_field(j, "id");
    if (id.empty()) throw Error("field \"id\" must be non-empty");
    const Source source = parse_source(string_field(j, "source"));
    std::optional<InteractionMeta> meta;
    if (auto it = j.find("interactions"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw Error("field \"interactions\" must be an object or null");
        InteractionMeta m;
        m.parent_id = optional_string(*it, "parent_id");
        m.likes = it->contains("likes") ? nonneg_int(*it, "likes") : 0;
        meta = m;
    }
    if (source == Source::general && meta) throw Error("general documents cannot carry interactions");
    return make_document(std::move(id), source, string_field(j, "domain"), string_field(j, "text"),
                         std::move(meta));
}

ordered_json JsonCodec<Document>::encode(const Document& d) {
    ordered_json j;
    j["id"] = d.id;
    j["source"] = to_string(d.source);
    j["domain"] = d.domain;
    j["text"] = d.text;
    if (d.interactions) {
        ordered_json m;
        m["parent_id"] = d.interactions->parent_id ? ordered_json(*d.interactions->parent_id) : ordered_json(nullptr);
        m["likes"] = d.interactions->likes;
        j["interactions"] = std::move(m);
    } else {
        j["interactions"] = nullptr;
    }
    return j;
}

TaskSample JsonCodec<TaskSample>::decode(const json& j) {
    TaskSample s;
    s.task = string_field(j, "task");
    s.capability = parse_capability(string_field(j, "capability"));
    s.format = parse_format(string_field(j, "format"));
    s.prompt = string_field(j, "prompt");
    if (auto it = j.find("options"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw Error("field \"options\" must be an array or null");
        std::vector<std::string> opts;
        for (const auto& o : *it) {
            if (!o.is_string()) throw Error("options must be strings");
            opts.push_back(o.get<std::string>());
        }
        s.options = std::move(opts);
    }
    s.answer = string_field(j, "answer");
    s.primary_label = optional_string(j, "primary_label");
    s.secondary_label = optional_string(j, "secondary_label");
    if (s.format == TaskFormat::multiple_choice) {
        if (!s.options || s.options->size() < 2) throw Error("multiple_choice needs at least 2 options");
        if (std::find(s.options->begin(), s.options->end(), s.answer) == s.options->end())
            throw Error("multiple_choice answer is not one of the options");
    } else if (s.options) {
        throw Error("options are only allowed for multiple_choice");
    }
    return s;
}

ordered_json JsonCodec<TaskSample>::encode(const TaskSample& s) {
    ordered_json j;
    j["task"] = s.task;
    j["capability"] = to_string(s.capability);
    j["format"] = to_string(s.format);
    j["prompt"] = s.prompt;
    j["options"] = s.options ? ordered_json(*s.options) : ordered_json(nullptr);
    j["answer"] = s.answer;
    if (s.primary_label) j["primary_label"] = *s.primary_label;
    if (s.secondary_label) j["secondary_label"] = *s.secondary_label;
    return j;
}

PreferencePair JsonCodec<PreferencePair>::decode(const json& j) {
    PreferencePair p;
    p.prompt = string_field(j, "prompt");
    p.chosen = string_field(j, "chosen");
    p.rejected = string_field(j, "rejected");
    p.strategy = parse_strategy(string_field(j, "strategy"));
    p.source_id = string_field(j, "source_id");
    if (p.chosen == p.rejected) throw Error("chosen and rejected are identical");
    return p;
}

ordered_json JsonCodec<PreferencePair>::encode(const PreferencePair& p) {
    ordered_json j;
    j["prompt"] = p.prompt;
    j["chosen"] = p.chosen;
    j["rejected"] = p.rejected;
    j["strategy"] = to_string(p.strategy);
    j["source_id"] = p.source_id;
    return j;
}

namespace detail {

void check_unique_ids(JsonlResult<Document>& result, const std::vector<std::size_t>& line_numbers) {
    std::unordered_map<std::string, std::size_t> seen;
    std::vector<Document> kept;
    kept.reserve(result.records.size());
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        auto [it, fresh] = seen.emplace(result.records[i].id, line_numbers[i]);
        if (!fresh) {
            result.errors.push_back({line_numbers[i], "duplicate id \"" + result.records[i].id +
                                                          "\" (first seen on line " +
                                                          std::to_string(it->second) + ")"});
            continue;
        }
        kept.push_back(std::move(result.records[i]));
    }
    result.records = std::move(kept);
    std::stable_sort(result.errors.begin(), result.errors.end(),
                     [](const LineError& a, const LineError& b) { return a.line < b.line; });
}

}  // namespace detail

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    auto out = open_output(path);
    out << content;
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
    write_file(path, j.dump(2, ' ', false, json::error_handler_t::replace) + "\n");
}

}  // namespace redforge
