#pragma once

#include <cstdint>
#include <set>
#include <string>

#include "tortrust/dataset.hpp"
#include "tortrust/ontology.hpp"
#include "tortrust/world.hpp"

namespace tortrust {

namespace ids {
std::string as(std::int64_t asn);
std::string ixp(const std::string& name);
std::string relay(const std::string& fingerprint);
std::string family(const std::string& smallest_fingerprint);
std::string as_org(const std::string& org);
std::string ixp_org(const std::string& org);
std::string country(const std::string& code);
std::string vlink(std::int64_t asn, const std::string& fingerprint);
}  // namespace ids

/// Builds the system-generated world: relays, mutual-reference families,
/// virtual links for every (AS, guard-or-exit relay) pair, ASes, IXPs,
/// organizations and jurisdictions. Pure in (o, d). Throws SemanticError on
/// inconsistent data and ValidationError when the result does not conform.
World build_world(const Ontology& o, const DatasetBundle& d);

/// Fraction of (member, epoch) pairs in which the member had the Running
/// flag. Throws SemanticError for an empty family or no epochs.
double family_uptime(const DatasetBundle& d, const std::set<std::string>& family);

}  // namespace tortrust
