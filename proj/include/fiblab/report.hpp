#pragma once

#include "precision.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <string>
#include <vector>

namespace fiblab {

using Json = nlohmann::ordered_json;

inline Json tagged(const Real& x, unsigned bits) { return to_tagged(x, bits); }

// One verdict. `measured` holds every number the verdict is computed from and `tolerance`
// the thresholds, so a reader can recompute `pass` from the record alone.
struct Check {
    std::string name;
    std::string property; // what is being checked, in words
    Json measured = Json::object();
    Json tolerance = Json::object();
    bool pass = false;
};

inline Json to_json(const Check& c)
{
    return Json{{"name", c.name}, {"property", c.property}, {"measured", c.measured}, {"tolerance", c.tolerance},
                {"verdict", c.pass ? "pass" : "fail"}};
}

// Everything except `timing` is a function of the config; timing lives in its own section
// so that reports can be compared byte for byte once it is dropped.
class Report {
public:
    Json config = Json::object();
    Json data = Json::object();
    Json precision_retries = Json::array();

    Check& add(Check c)
    {
        checks_.push_back(std::move(c));
        return checks_.back();
    }
    const std::vector<Check>& checks() const { return checks_; }

    bool all_pass() const
    {
        for (const auto& c : checks_)
            if (!c.pass)
                return false;
        return true;
    }

    void time(const std::string& stage, double seconds) { timing_[stage] = seconds; }

    Json to_json(bool with_timing = true) const
    {
        Json j;
        j["config"] = config;
        Json cs = Json::array();
        for (const auto& c : checks_)
            cs.push_back(fiblab::to_json(c));
        j["checks"] = cs;
        j["all_pass"] = all_pass();
        j["precision_retries"] = precision_retries;
        j["data"] = data;
        if (with_timing)
            j["timing"] = timing_;
        return j;
    }

    std::string dump(bool with_timing = true) const { return to_json(with_timing).dump(2) + "\n"; }

private:
    std::vector<Check> checks_;
    Json timing_ = Json::object();
};

// Records the wall time of a scope into a report stage.
class StageTimer {
public:
    StageTimer(Report& r, std::string stage) : r_(r), stage_(std::move(stage)), t0_(std::chrono::steady_clock::now()) {}
    ~StageTimer() { r_.time(stage_, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count()); }
    StageTimer(const StageTimer&) = delete;
    StageTimer& operator=(const StageTimer&) = delete;

private:
    Report& r_;
    std::string stage_;
    std::chrono::steady_clock::time_point t0_;
};

} // namespace fiblab
