#include "pfsos/trial_data.hpp"

#include "pfsos/error.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace pfsos {

const char* to_string(Endpoint e) {
    return e == Endpoint::Pfs ? "PFS" : "OS";
}

std::size_t Snapshot::events(Endpoint e) const {
    std::size_t n = 0;
    for (const auto& r : records) n += static_cast<std::size_t>(r.delta(e));
    return n;
}

CutoffTargets targets_from_rates(std::size_t n, double r_pfs, double r_os) {
    const auto target = [n](double r) {
        // Guard against 25/64 * 128 landing at 50.000000000000007.
        const double raw = r * static_cast<double>(n);
        const double nearest = std::round(raw);
        const double d = std::abs(raw - nearest) < 1e-9 ? nearest : std::ceil(raw);
        return static_cast<std::size_t>(std::max(1.0, d));
    };
    return {target(r_pfs), target(r_os)};
}

Snapshot snapshot(const Cohort& cohort, double t) {
    Snapshot snap;
    snap.calendar_time = t;
    snap.cohort_size = cohort.size();
    snap.records.reserve(cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const PatientPath& p = cohort[i];
        if (p.entry > t) continue;
        const double limit = std::min(p.dropout, t - p.entry);
        // Observation is decided on the calendar scale, the same way
        // event_cutoff dates events, so a snapshot taken at a cutoff always
        // contains the triggering event.
        const auto observed = [&](double event_time) {
            return event_time <= p.dropout && p.entry + event_time <= t;
        };
        ObservedRecord r;
        r.id = i;
        r.arm = p.arm;
        r.entry = p.entry;
        r.d_pfs = observed(p.t_pfs) ? 1 : 0;
        r.x_pfs = r.d_pfs ? p.t_pfs : std::min(p.t_pfs, limit);
        r.d_os = observed(p.t_os) ? 1 : 0;
        r.x_os = r.d_os ? p.t_os : std::max(r.x_pfs, std::min(p.t_os, limit));
        snap.records.push_back(r);
    }
    return snap;
}

double event_cutoff(const Cohort& cohort, Endpoint endpoint, std::size_t d) {
    if (d == 0) throw InsufficientEvents("event target must be at least 1");
    std::vector<double> dates;
    dates.reserve(cohort.size());
    for (const auto& p : cohort) {
        const double t = endpoint == Endpoint::Pfs ? p.t_pfs : p.t_os;
        if (t <= p.dropout) dates.push_back(p.entry + t);
    }
    if (dates.size() < d) {
        throw InsufficientEvents(std::string("only ") + std::to_string(dates.size()) + " " +
                                 to_string(endpoint) + " events observable, target " +
                                 std::to_string(d));
    }
    std::nth_element(dates.begin(), dates.begin() + static_cast<std::ptrdiff_t>(d - 1), dates.end());
    return dates[d - 1];
}

std::size_t at_risk(const Snapshot& snap, Endpoint endpoint, double s, Group group) {
    std::size_t n = 0;
    for (const auto& r : snap.records) {
        if (group != Group::Both && r.arm != static_cast<int>(group)) continue;
        if (r.x(endpoint) >= s) ++n;
    }
    return n;
}

double information_fraction(const Snapshot& snap, Endpoint endpoint, std::size_t d_target) {
    return static_cast<double>(snap.events(endpoint)) / static_cast<double>(d_target);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
    }
}

int parse_flag(const std::string& s, std::size_t line_no) {
    const double v = parse_number(s, line_no);
    if (v != 0.0 && v != 1.0) {
        throw Error("line " + std::to_string(line_no) + ": indicator must be 0 or 1");
    }
    return static_cast<int>(v);
}

// Reads the header and returns the column index of each requested name.
std::map<std::string, std::size_t> read_header(std::istream& in, std::string& meta,
                                               std::size_t& line_no) {
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            meta += line.substr(1) + " ";
            continue;
        }
        std::map<std::string, std::size_t> cols;
        const auto names = split_csv(line);
        for (std::size_t i = 0; i < names.size(); ++i) cols[names[i]] = i;
        return cols;
    }
    throw Error("table has no header line");
}

std::size_t column(const std::map<std::string, std::size_t>& cols, const std::string& name) {
    const auto it = cols.find(name);
    if (it == cols.end()) throw Error("missing column '" + name + "'");
    return it->second;
}

}  // namespace

void write_snapshot(std::ostream& out, const Snapshot& snap) {
    out.precision(17);
    out << "# calendar_time=" << snap.calendar_time << " cohort_size=" << snap.cohort_size << "\n";
    out << "id,arm,entry,x_pfs,d_pfs,x_os,d_os\n";
    for (const auto& r : snap.records) {
        out << r.id << ',' << r.arm << ',' << r.entry << ',' << r.x_pfs << ',' << r.d_pfs << ','
            << r.x_os << ',' << r.d_os << '\n';
    }
}

Snapshot read_snapshot(std::istream& in) {
    std::string meta;
    std::size_t line_no = 0;
    const auto cols = read_header(in, meta, line_no);
    const bool has_id = cols.count("id") > 0;
    const std::size_t c_arm = column(cols, "arm"), c_entry = column(cols, "entry"),
                      c_xp = column(cols, "x_pfs"), c_dp = column(cols, "d_pfs"),
                      c_xo = column(cols, "x_os"), c_do = column(cols, "d_os");

    Snapshot snap;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto f = split_csv(line);
        if (f.size() < cols.size()) {
            throw Error("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(cols.size()) + " fields");
        }
        ObservedRecord r;
        r.id = has_id ? static_cast<std::size_t>(parse_number(f[cols.at("id")], line_no))
                      : snap.records.size();
        r.arm = parse_flag(f[c_arm], line_no);
        r.entry = parse_number(f[c_entry], line_no);
        r.x_pfs = parse_number(f[c_xp], line_no);
        r.d_pfs = parse_flag(f[c_dp], line_no);
        r.x_os = parse_number(f[c_xo], line_no);
        r.d_os = parse_flag(f[c_do], line_no);
        if (r.x_pfs > r.x_os || (r.d_os == 1 && r.d_pfs == 0) || r.x_pfs < 0.0) {
            throw Error("line " + std::to_string(line_no) + ": inconsistent PFS/OS record");
        }
        snap.records.push_back(r);
    }

    snap.cohort_size = snap.records.size();
    snap.calendar_time = std::numeric_limits<double>::infinity();
    std::istringstream ms(meta);
    std::string token;
    while (ms >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = token.substr(0, eq);
        const std::string value = token.substr(eq + 1);
        if (key == "calendar_time") snap.calendar_time = parse_number(value, 1);
        if (key == "cohort_size") {
            snap.cohort_size = static_cast<std::size_t>(parse_number(value, 1));
        }
    }
    if (snap.cohort_size < snap.records.size()) {
        throw Error("cohort_size is smaller than the number of records");
    }
    return snap;
}

void write_cohort(std::ostream& out, const Cohort& cohort) {
    out.precision(17);
    out << "arm,entry,t_pfs,t_os,dropout\n";
    for (const auto& p : cohort) {
        out << p.arm << ',' << p.entry << ',' << p.t_pfs << ',' << p.t_os << ',' << p.dropout
            << '\n';
    }
}

Cohort read_cohort(std::istream& in) {
    std::string meta;
    std::size_t line_no = 0;
    const auto cols = read_header(in, meta, line_no);
    const std::size_t c_arm = column(cols, "arm"), c_entry = column(cols, "entry"),
                      c_tp = column(cols, "t_pfs"), c_to = column(cols, "t_os"),
                      c_c = column(cols, "dropout");
    Cohort cohort;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto f = split_csv(line);
        if (f.size() < cols.size()) {
            throw Error("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(cols.size()) + " fields");
        }
        PatientPath p;
        p.arm = parse_flag(f[c_arm], line_no);
        p.entry = parse_number(f[c_entry], line_no);
        p.t_pfs = parse_number(f[c_tp], line_no);
        p.t_os = parse_number(f[c_to], line_no);
        p.dropout = parse_number(f[c_c], line_no);
        if (p.t_pfs > p.t_os || p.t_pfs < 0.0 || p.dropout <= 0.0) {
            throw Error("line " + std::to_string(line_no) + ": inconsistent latent record");
        }
        cohort.push_back(p);
    }
    return cohort;
}

}  // namespace pfsos
