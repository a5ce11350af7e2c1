#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace livsic {

// 17 significant digits, '.' decimal regardless of locale. Round-trips any
// double exactly through strtod.
std::string format_real(double x);

// Writes content to path via a temp file in the same directory plus rename,
// so readers never observe a partial file. Throws std::runtime_error on IO
// failure.
void write_text_atomic(const std::string& path, const std::string& content);

// Output directory resolution: explicit argument beats the LIVSIC_OUT
// environment variable beats the current directory. Never creates anything;
// the writer creates missing directories on demand.
std::string resolve_output_dir(const std::string& explicit_dir = "");

// Accumulates rows in memory and writes the whole table at once, so output
// is atomic and byte-identical across reruns with the same inputs.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    void begin_row();
    void add(const std::string& value);
    void add(double value);
    void add(long long value);
    void add(int value) { add(static_cast<long long>(value)); }
    void add(bool value) { add(std::string(value ? "true" : "false")); }

    // Throws std::logic_error when a row has the wrong arity.
    std::string str() const;
    void write(const std::string& path) const;

    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// One named pass/fail verdict plus optional measured value and the tolerance
// it was judged against. Every verdict carries its tolerance explicitly.
struct Verdict {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

// Collects verdicts and wall times, renders {verdicts, timings} JSON.
class RunSummary {
public:
    void add_verdict(Verdict v);
    void add_timing(const std::string& name, double seconds);

    bool all_pass() const;
    const std::vector<Verdict>& verdicts() const { return verdicts_; }

    std::string to_json() const;
    void write(const std::string& path) const;

private:
    std::vector<Verdict> verdicts_;
    std::vector<std::pair<std::string, double>> timings_;
};

// Simple wall-clock scope timer feeding RunSummary.
class ScopedTimer {
public:
    ScopedTimer(RunSummary& summary, std::string name);
    ~ScopedTimer();

    ScopedTimer(const ScopedTimer&) = delete;
    ScopedTimer& operator=(const ScopedTimer&) = delete;

private:
    RunSummary& summary_;
    std::string name_;
    std::uint64_t start_ns_;
};

}  // namespace livsic
