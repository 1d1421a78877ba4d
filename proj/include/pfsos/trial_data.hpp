#pragma once

#include "pfsos/multistate.hpp"

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace pfsos {

enum class Endpoint { Pfs, Os };

const char* to_string(Endpoint e);

/// What is known about one enrolled patient at a given calendar time.
struct ObservedRecord {
    std::size_t id = 0;
    int arm = 0;
    double entry = 0.0;
    double x_pfs = 0.0;
    int d_pfs = 0;
    double x_os = 0.0;
    int d_os = 0;

    double x(Endpoint e) const { return e == Endpoint::Pfs ? x_pfs : x_os; }
    int delta(Endpoint e) const { return e == Endpoint::Pfs ? d_pfs : d_os; }
};

/// Observed data at `calendar_time`. `cohort_size` is the planned n used
/// for the 1/sqrt(n) scaling of the statistics; it must be the same for
/// every snapshot of one trial.
struct Snapshot {
    double calendar_time = 0.0;
    std::size_t cohort_size = 0;
    std::vector<ObservedRecord> records;

    std::size_t events(Endpoint e) const;
};

struct CutoffTargets {
    std::size_t d_pfs = 1;
    std::size_t d_os = 1;

    std::size_t target(Endpoint e) const { return e == Endpoint::Pfs ? d_pfs : d_os; }
};

/// d_E = ceil(r_E * n) for both endpoints.
CutoffTargets targets_from_rates(std::size_t n, double r_pfs, double r_os);

Snapshot snapshot(const Cohort& cohort, double t);

/// Calendar date of the d-th observable event of the endpoint.
/// Throws InsufficientEvents when fewer than d events are ever observable.
double event_cutoff(const Cohort& cohort, Endpoint endpoint, std::size_t d);

enum class Group { Control = 0, Experimental = 1, Both = 2 };

/// Number of records with observed time >= s, optionally restricted to an arm.
std::size_t at_risk(const Snapshot& snap, Endpoint endpoint, double s, Group group = Group::Both);

/// Observed events over the planned target; not capped at one.
double information_fraction(const Snapshot& snap, Endpoint endpoint, std::size_t d_target);

/// Comma-separated table with header `id,arm,entry,x_pfs,d_pfs,x_os,d_os`.
/// The id column is optional on input (row order is used instead).
/// The first comment line `# calendar_time=<t> cohort_size=<n>` carries the
/// snapshot metadata.
void write_snapshot(std::ostream& out, const Snapshot& snap);
Snapshot read_snapshot(std::istream& in);

/// Latent cohort table with header `arm,entry,t_pfs,t_os,dropout`.
void write_cohort(std::ostream& out, const Cohort& cohort);
Cohort read_cohort(std::istream& in);

}  // namespace pfsos
