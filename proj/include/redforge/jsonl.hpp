#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "redforge/parallel.hpp"
#include "redforge/types.hpp"

namespace redforge {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Encode/decode hooks for one JSONL record kind. `decode` throws Error on
/// any schema violation; `encode` emits fields in canonical order.
template <class T>
struct JsonCodec;

template <>
struct JsonCodec<Document> {
    static Document decode(const json& j);
    static ordered_json encode(const Document& d);
};

template <>
struct JsonCodec<TaskSample> {
    static TaskSample decode(const json& j);
    static ordered_json encode(const TaskSample& s);
};

template <>
struct JsonCodec<PreferencePair> {
    static PreferencePair decode(const json& j);
    static ordered_json encode(const PreferencePair& p);
};

struct LineError {
    std::size_t line = 0;  // 1-based
    std::string message;
};

template <class T>
struct JsonlResult {
    std::vector<T> records;
    std::vector<LineError> errors;
};

// Field accessors shared by codecs.
namespace jsonf {
const json& require(const json& j, const char* key);
std::string string_field(const json& j, const char* key);
std::optional<std::string> optional_string(const json& j, const char* key);
std::int64_t nonneg_int(const json& j, const char* key);
double number_field(const json& j, const char* key);
}  // namespace jsonf

/// Serializes one record as a single JSON line (no trailing newline).
template <class T>
std::string serialize(const T& record) {
    return JsonCodec<T>::encode(record).dump(-1, ' ', false, json::error_handler_t::replace);
}

template <class T>
T deserialize(const std::string& line) {
    return JsonCodec<T>::decode(json::parse(line));
}

namespace detail {
void check_unique_ids(JsonlResult<Document>& result, const std::vector<std::size_t>& line_numbers);
template <class T>
void post_validate(JsonlResult<T>&, const std::vector<std::size_t>&) {}
template <>
inline void post_validate(JsonlResult<Document>& r, const std::vector<std::size_t>& lines) {
    check_unique_ids(r, lines);
}
}  // namespace detail

/// Parses newline-delimited records. Blank lines are skipped; every other
/// line yields either a record or a LineError, in input order.
template <class T>
JsonlResult<T> parse_jsonl_stream(std::istream& in) {
    std::vector<std::string> lines;
    std::vector<std::size_t> numbers;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        lines.push_back(std::move(line));
        numbers.push_back(n);
    }
    struct Slot {
        std::optional<T> record;
        std::string error;
    };
    auto slots = parallel_map<Slot>(lines.size(), [&](std::size_t i) {
        Slot s;
        try {
            s.record = JsonCodec<T>::decode(json::parse(lines[i]));
        } catch (const std::exception& e) {
            s.error = e.what();
        }
        return s;
    });
    JsonlResult<T> result;
    std::vector<std::size_t> record_lines;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].record) {
            result.records.push_back(std::move(*slots[i].record));
            record_lines.push_back(numbers[i]);
        } else {
            result.errors.push_back({numbers[i], std::move(slots[i].error)});
        }
    }
    detail::post_validate(result, record_lines);
    return result;
}

template <class T>
JsonlResult<T> parse_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return parse_jsonl_stream<T>(in);
}

/// Like parse_jsonl but any line error is fatal.
template <class T>
std::vector<T> load_jsonl_strict(const std::filesystem::path& path) {
    auto r = parse_jsonl<T>(path);
    if (!r.errors.empty()) {
        const auto& e = r.errors.front();
        throw Error(path.string() + ":" + std::to_string(e.line) + ": " + e.message +
                    (r.errors.size() > 1 ? " (+" + std::to_string(r.errors.size() - 1) + " more)" : ""));
    }
    return std::move(r.records);
}

template <class T>
void write_jsonl(std::ostream& out, const std::vector<T>& records) {
    for (const auto& r : records) out << serialize(r) << '\n';
}

/// Binary output stream; missing parent directories are created.
std::ofstream open_output(const std::filesystem::path& path);

template <class T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& records) {
    auto out = open_output(path);
    write_jsonl(out, records);
}

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);
void write_json(const std::filesystem::path& path, const ordered_json& j);

}  // namespace redforge
