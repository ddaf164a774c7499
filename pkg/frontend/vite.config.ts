import { defineConfig } from 'vitest/config';

const service = process.env.VIZREC_SERVICE ?? 'http://127.0.0.1:8080';

export default defineConfig({
  server: {
    proxy: {
      '/datasets': service,
      '/configs': service,
      '/health': service,
    },
  },
  test: {
    environment: 'jsdom',
  },
});
