export { Rng } from "./rng.js";
export { LumpyParams, PrfSystem, defaultLumpy, defaultPrf, lumpyImage, sampleCenters, simulateEnsemble } from "./lumpy.js";
export { LinearGenerator, fitLinearGenerator, forward, jacobiEigh } from "./pca.js";
export { GsomFile, encodeGsom, readGsom, writeGsom } from "./gsom.js";
export { powerSpectrum2d, radialPowerSpectrum } from "./spectrum.js";
export { TrainOptions, TrainResult, defaultTrainOptions, train } from "./train.js";
