#pragma once

#include "webcorpus/bktree.hpp"
#include "webcorpus/dataset.hpp"
#include "webcorpus/dedup.hpp"
#include "webcorpus/features.hpp"
#include "webcorpus/harvest.hpp"
#include "webcorpus/image.hpp"
#include "webcorpus/linear.hpp"
#include "webcorpus/manifest.hpp"
#include "webcorpus/matrix.hpp"
#include "webcorpus/pca.hpp"
#include "webcorpus/phash.hpp"
#include "webcorpus/protocols.hpp"
#include "webcorpus/provider.hpp"
#include "webcorpus/random.hpp"
#include "webcorpus/scatter.hpp"
#include "webcorpus/taxonomy.hpp"
#include "webcorpus/tsne.hpp"
#include "webcorpus/util.hpp"
