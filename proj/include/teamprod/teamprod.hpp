#pragma once

#include <teamprod/catalog.hpp>
#include <teamprod/code_metrics.hpp>
#include <teamprod/error.hpp>
#include <teamprod/git_source.hpp>
#include <teamprod/identity.hpp>
#include <teamprod/ingest.hpp>
#include <teamprod/networks.hpp>
#include <teamprod/ownership.hpp>
#include <teamprod/pipeline.hpp>
#include <teamprod/stats.hpp>
#include <teamprod/windows.hpp>
