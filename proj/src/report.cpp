#include "livsic/report.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace livsic {

std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("write_text_atomic: cannot open " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write_text_atomic: write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string resolve_output_dir(const std::string& explicit_dir) {
    if (!explicit_dir.empty()) return explicit_dir;
    if (const char* env = std::getenv("LIVSIC_OUT"); env && *env) return env;
    return ".";
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw std::logic_error("CsvWriter: empty header");
}

void CsvWriter::begin_row() { rows_.emplace_back(); }

void CsvWriter::add(const std::string& value) {
    if (rows_.empty()) throw std::logic_error("CsvWriter: add before begin_row");
    if (rows_.back().size() >= header_.size())
        throw std::logic_error("CsvWriter: row wider than header");
    rows_.back().push_back(value);
}

void CsvWriter::add(double value) { add(format_real(value)); }

void CsvWriter::add(long long value) { add(std::to_string(value)); }

std::string CsvWriter::str() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < header_.size(); ++i)
        out << (i ? "," : "") << header_[i];
    out << '\n';
    for (const auto& row : rows_) {
        if (row.size() != header_.size())
            throw std::logic_error("CsvWriter: row arity does not match header");
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
    return out.str();
}

void CsvWriter::write(const std::string& path) const { write_text_atomic(path, str()); }

void RunSummary::add_verdict(Verdict v) { verdicts_.push_back(std::move(v)); }

void RunSummary::add_timing(const std::string& name, double seconds) {
    timings_.emplace_back(name, seconds);
}

bool RunSummary::all_pass() const {
    for (const Verdict& v : verdicts_)
        if (!v.pass) return false;
    return true;
}

std::string RunSummary::to_json() const {
    nlohmann::ordered_json doc;
    doc["verdicts"] = nlohmann::ordered_json::array();
    for (const Verdict& v : verdicts_) {
        nlohmann::ordered_json row;
        row["name"] = v.name;
        row["pass"] = v.pass;
        row["value"] = v.value;
        row["tolerance"] = v.tolerance;
        if (!v.detail.empty()) row["detail"] = v.detail;
        doc["verdicts"].push_back(row);
    }
    doc["timings"] = nlohmann::ordered_json::array();
    for (const auto& [name, seconds] : timings_) {
        nlohmann::ordered_json row;
        row["name"] = name;
        row["seconds"] = seconds;
        doc["timings"].push_back(row);
    }
    doc["all_pass"] = all_pass();
    return doc.dump(2) + "\n";
}

void RunSummary::write(const std::string& path) const { write_text_atomic(path, to_json()); }

namespace {
std::uint64_t now_ns() {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now().time_since_epoch())
            .count());
}
}  // namespace

ScopedTimer::ScopedTimer(RunSummary& summary, std::string name)
    : summary_(summary), name_(std::move(name)), start_ns_(now_ns()) {}

ScopedTimer::~ScopedTimer() {
    summary_.add_timing(name_, static_cast<double>(now_ns() - start_ns_) * 1e-9);
}

}  // namespace livsic
