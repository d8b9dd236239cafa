#pragma once

#include "nnv/BoundStore.h"
#include "nnv/Query.h"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nnv {

class Tableau;

namespace nlr {

enum class LayerKind { Input, WeightedSum, Relu, LeakyRelu, Abs, Sign, Max };

const char *layerKindName( LayerKind kind );

struct NeuronRef
{
    unsigned layer = 0;
    unsigned neuron = 0;
    bool operator==( const NeuronRef & ) const = default;
};

struct WeightedTerm
{
    NeuronRef source;
    double weight = 0;
};

struct Neuron
{
    VariableId variable = 0;
    // WeightedSum: value = sum of weight * source + bias.
    std::vector<WeightedTerm> terms;
    double bias = 0;
    // Activations: one source, several for Max.
    std::vector<NeuronRef> sources;
    double alpha = 0;
};

// Neurons of one kind whose sources all lie in earlier layers.
struct Layer
{
    unsigned id = 0;
    LayerKind kind = LayerKind::Input;
    std::vector<unsigned> sourceLayers;
    std::vector<Neuron> neurons;
};

struct Interval
{
    double lower = -kInfinity;
    double upper = kInfinity;
};

// Per layer, per neuron.
using LayerValues = std::vector<std::vector<double>>;
using LayerIntervals = std::vector<std::vector<Interval>>;

class NetworkTopology
{
public:
    std::vector<Layer> layers;

    const Layer &inputLayer() const
    {
        return layers.front();
    }
    unsigned numInputs() const
    {
        return static_cast<unsigned>( layers.front().neurons.size() );
    }
    std::optional<NeuronRef> locate( VariableId variable ) const;
    // Neuron intervals read from the store.
    LayerIntervals storeIntervals( const BoundStore &bounds ) const;
    std::string describe() const;
};

// Layers the query greedily: inputs first, then per round every constraint whose
// sources are already placed (grouped by kind) and every variable defined by an
// equality over placed variables. Equations mentioning constraint aux variables
// are ignored. Absent when no layer beyond the inputs is found or an output
// variable stays unplaced (for instance under cyclic definitions).
std::optional<NetworkTopology> inferTopology( const Query &query );

LayerValues evaluate( const NetworkTopology &topology, std::span<const double> inputs );

struct AnalysisResult
{
    bool infeasible = false;
    // Bound updates strictly tighter than the store they were computed against.
    std::vector<BoundUpdate> tightenings;
    // Concrete neuron intervals (empty for the LP pass).
    LayerIntervals intervals;
};

AnalysisResult intervalBoundPropagation( const NetworkTopology &topology, const BoundStore &bounds );
AnalysisResult symbolicBoundPropagation( const NetworkTopology &topology, const BoundStore &bounds );
AnalysisResult deepPoly( const NetworkTopology &topology, const BoundStore &bounds );

// Minimises and maximises every activation source over the linear part of the
// query (equations plus current bounds). The tableau must have been built from
// the query's equations; its bounds are synced from the store first.
AnalysisResult lpTightening( const NetworkTopology &topology, const BoundStore &bounds, Tableau &tableau );

enum class Analysis { Ibp, Symbolic, DeepPoly, Lp };

const char *analysisName( Analysis analysis );
// Comma-separated list of ibp, sbt, deeppoly, lp. Throws UsageError on unknown names.
std::vector<Analysis> parseAnalyses( const std::string &list );

} // namespace nlr
} // namespace nnv
