#pragma once

#include <string>

#include <json.hpp>

#include "cwa/attacks.hpp"
#include "cwa/harness.hpp"
#include "cwa/models.hpp"

namespace cwa {

using nlohmann::json;

json model_to_json(const Classifier& model);
ClassifierPtr model_from_json(const json& j);

json zoo_to_json(const Zoo& zoo);
Zoo zoo_from_json(const json& j);

json dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const json& j);

json dataset_spec_to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const json& j);

json attack_config_to_json(const AttackConfig& cfg);
AttackConfig attack_config_from_json(const json& j);

json trace_to_json(const AttackTrace& trace, size_t iterate_size_limit = 4096);

json campaign_report_to_json(const CampaignReport& report);
CampaignReport campaign_report_from_json(const json& j);

json sweep_report_to_json(const SweepReport& report);
SweepReport sweep_report_from_json(const json& j);

// One row per attack x evaluation model; fixed column order.
std::string campaign_report_to_csv(const CampaignReport& report);
std::string sweep_report_to_csv(const SweepReport& report);

json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& j);
void save_text_file(const std::string& path, const std::string& text);

}  // namespace cwa
