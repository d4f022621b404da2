#pragma once

#include <array>
#include <string>
#include <vector>

#include "chainqed/types.hpp"

namespace chainqed
{
    inline constexpr const char* artifact_version = "1.0.0";

    /// Resolved settings for one CLI invocation. Serialized as nested JSON sections;
    /// unknown keys are rejected.
    struct RunConfig
    {
        struct Geometry
        {
            int n_atoms = 20;
            Real spacing = 0.35;
        } geometry;

        struct Truncation
        {
            int n_max = 2;
        } truncation;

        struct Drive
        {
            Real rabi = 100.0;
            Real pulse_area = 0.6;
            std::string profile = "superradiant"; // superradiant | uniform | custom
            std::vector<Real> custom;
        } drive;

        struct Pvd
        {
            Real amplitude = 100.0;
            int xi_aim = 15;
        } pvd;

        struct Schedule
        {
            Real storage_time = 30.0;
            int emission_cycles = 5;
            bool closed_form_storage = true;
            int storage_samples = 0;
        } schedule;

        struct Integrator
        {
            Real dt_drive = 0.0; // 0: default rule
            Real dt_transfer = 0.0;
            Real dt_free = 0.0;
        } integrator;

        struct Output
        {
            std::string directory = "out";
            int stride = 1;
            std::vector<int> single_modes;
            std::vector<std::array<int, 2>> pair_modes;
        } output;

        struct Sweep
        {
            std::vector<int> sizes{4, 6, 8, 10, 12, 14, 16, 18, 20};
            std::vector<Real> pulse_areas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
            std::vector<Real> spacings{0.35};
            Real window_decays = 8.0; // storage window in units of 1/Gamma_1
            int samples = 2000;
            std::vector<Real> times{0.0, 10.0, 30.0, 100.0, 300.0, 1000.0};
        } sweep;

        struct Radiation
        {
            Real snapshot_time = -1.0; // < 0: end of the first emission transfer
            int n_theta = 181;
            int n_phi = 361;
        } radiation;

        struct Validation
        {
            int max_atoms = 12;
        } validation;

        void validate() const;

        std::string to_json() const;
        static RunConfig from_json(const std::string& text);
        static RunConfig load(const std::string& path);

        /// Applies "section.key=value"; the value is parsed as JSON, falling back to a string.
        void set(const std::string& assignment);

        bool operator==(const RunConfig& other) const { return to_json() == other.to_json(); }
    };
}
