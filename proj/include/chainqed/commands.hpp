#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "chainqed/config.hpp"
#include "chainqed/dynamics.hpp"

namespace chainqed
{
    using CsvCell = std::variant<Real, long long, std::string>;

    /// A named CSV table. `write` emits <name>.csv and a <name>.csv.json sidecar holding the
    /// schema tag, the column list, the artifact version and the resolved config.
    class CsvTable
    {
    public:
        CsvTable(std::string name, std::vector<std::string> columns, int schema_version = 1);

        void add_row(std::vector<CsvCell> row);

        const std::string& name() const { return m_name; }
        const std::vector<std::string>& columns() const { return m_columns; }
        std::size_t rows() const { return m_rows.size(); }

        std::string csv() const;
        std::filesystem::path write(const std::filesystem::path& directory, const RunConfig& config) const;

    private:
        std::string m_name;
        std::vector<std::string> m_columns;
        int m_schema_version;
        std::vector<std::vector<CsvCell>> m_rows;
    };

    /// Real numbers print with 17 significant digits, NaN as "nan".
    std::string format_cell(const CsvCell& cell);

    ChainGeometry geometry_of(const RunConfig& config);
    ProtocolParameters protocol_parameters(const RunConfig& config);
    ProjectionRequest projection_request(const RunConfig& config);

    /// Each command writes into config.output.directory and returns the CSV paths it wrote.
    std::vector<std::filesystem::path> cmd_modes(const RunConfig& config);
    std::vector<std::filesystem::path> cmd_protocol(const RunConfig& config);
    std::vector<std::filesystem::path> cmd_storage_sweep(const RunConfig& config);
    std::vector<std::filesystem::path> cmd_validate_truncation(const RunConfig& config);
    std::vector<std::filesystem::path> cmd_radiation(const RunConfig& config);
    std::vector<std::filesystem::path> cmd_rate_model(const RunConfig& config);
    std::vector<std::filesystem::path> cmd_kappa_map(const RunConfig& config);

    /// One storage analysis: illumination, staggered transfer, then closed-form storage over
    /// window_decays / Gamma_1 sampled at `samples` points.
    struct StorageRun
    {
        int n_atoms = 0;
        Real spacing = 0.0;
        Real pulse_area = 0.0;
        std::string status; // ok | none | inconclusive
        Real transition_time = 0.0; // from the start of storage; NaN unless status is ok
        Real decay_first = 0.0;
        Real kappa = 0.0;
        TimeSeries series;
    };

    StorageRun storage_run(const ChainModel& model, Real pulse_area, const RunConfig& config);
}
